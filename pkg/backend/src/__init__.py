# This file makes Python treat the 'src' directory as a sub-package. 