# Data module: label spaces, synthetic FACS benchmark, batch sampling and dataset files.
