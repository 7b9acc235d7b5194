"""constants.py defines the defaults shared across the package."""

# Monte-Carlo sample count per gradient estimate
DEFAULT_N_SAMPLES = 1024

# ESS rescaling: bisection on log(lambda) over [2**-40, 2**40]
RESCALE_LOG2_BRACKET = 40.0
RESCALE_MAX_ITER = 60
RESCALE_TOL = 1e-3

# Quadrature oracle
DEFAULT_N_NODES = 512
DEFAULT_N_NODES_3D = 96
MIN_N_NODES = 64
DEFAULT_TRUNCATION = 8.0
MIN_TRUNCATION = 8.0
MAX_ORACLE_DIM = 3

# Stereographic projection
UNIT_NORM_TOL = 1e-9
POLE_TOL = 1e-12

# Random substream tags
SUBSTREAM_TAGS = {"noise": 0, "mc": 1}

# Experiment plumbing
DEFAULT_RECORD_EVERY = 10
DEFAULT_THREADS = 1
THREADS_ENV_VAR = "MOLLIFY_THREADS"
FLOAT_FORMAT = "%.17g"
TRACE_HEADER = ("n", "beta", "gamma", "value", "grad_norm", "ess", "lambda")

# Moment order declared for unbounded additive Gaussian noise
DEFAULT_NOISE_MOMENT_ORDER = 16.0
