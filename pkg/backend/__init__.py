# This file makes Python treat the 'backend' directory as a package. 