import warnings

# environment noise: the container's TBB is older than numba wants
warnings.filterwarnings("ignore", message=".*TBB.*")
