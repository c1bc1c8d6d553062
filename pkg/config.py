# Application identity
APP_NAME = "fibrosis-score"
APP_VERSION = "0.1.0"
LOGGER_NAME = "fibrosis-score"

# Patch extraction and GAN training (one normal image, 1000 patches of 96x96, 500 epochs)
DEFAULT_PATCH_COUNT = 1000
DEFAULT_PATCH_SIZE = 96
DEFAULT_EPOCHS = 500
DEFAULT_BATCH_SIZE = 64
DEFAULT_LATENT_DIM = 100
DEFAULT_SEED = 0

# Adam settings for adversarial training
GAN_LEARNING_RATE = 2e-4
GAN_BETA1 = 0.5
GAN_BETA2 = 0.999
ADAM_EPS = 1e-8

# Network layout
INIT_STD = 0.02
LEAKY_SLOPE = 0.2
GENERATOR_DENSE_CHANNELS = 128
GENERATOR_HIDDEN_CHANNELS = 64
DISCRIMINATOR_CHANNELS = (64, 128)
KERNEL_SIZE = 4
STRIDE = 2
PADDING = 1
BCE_EPS = 1e-7

# Query-time anomaly settings
DEFAULT_LAMBDA = 0.1
DEFAULT_SEARCH_STEPS = 100
DEFAULT_SEARCH_LR = 1e-2
DEFAULT_N_Z = 64
SEARCH_CHUNK = 16
Z_MODES = ["search", "random"]

# Region of interest
MIN_ROI_SIZE = 96
DEFAULT_ROI_QUANTILE = 0.80
DEFAULT_ROI_BLUR = 0.0
ROI_EXPANSION = 0.05

# Channel layout of RGB rasters
CHANNELS = {
    "red": 0,
    "green": 1,
    "blue": 2,
}

# t-SNE
DEFAULT_PERPLEXITY = 30.0
DEFAULT_TSNE_ITERS = 1000
TSNE_EXAGGERATION = 12.0
TSNE_EXAGGERATION_ITERS = 250
TSNE_MOMENTUM = (0.5, 0.8)
TSNE_LEARNING_RATE = 200.0
TSNE_PERPLEXITY_TOL = 1e-4
TSNE_BISECTION_STEPS = 50
DEFAULT_EMBED_PATCHES = 50

# Phantom series: post-ligation imaging timepoints
DEFAULT_TIMEPOINTS = ["24 hours", "three days", "four days", "two weeks", "four weeks"]
PHANTOM_MODALITIES = ["unstained", "stained"]
PHANTOM_FRACTION_TOL = 0.02
PHANTOM_MAX_PHI = 0.9

# Checkpoint file layout
CHECKPOINT_MAGIC = b"FSC1"
CHECKPOINT_FORMAT_VERSION = 1

# Settings naming only where outputs are written; left out of the config hash
DESTINATION_SETTINGS = ["out"]

# Exit codes
EXIT_OK = 0
EXIT_USAGE_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERIC_ERROR = 4

# Command configuration
COMMANDS = {
    "synth": {
        "module": "synth",
        "description": "Generate a synthetic SHG phantom series with ground-truth masks"
    },
    "train": {
        "module": "train",
        "description": "Train the one-shot GAN on patches of a single normal image"
    },
    "score": {
        "module": "score",
        "description": "Compute the infarction score of a query image"
    },
    "segment": {
        "module": "segment",
        "description": "Write green/red segmentation masks for a query image"
    },
    "heatmap": {
        "module": "heatmap",
        "description": "Write the residual difference heat map for a query image"
    },
    "embed": {
        "module": "embed",
        "description": "Project discriminator bottleneck features with t-SNE"
    },
    "eval": {
        "module": "evaluate",
        "description": "Score a phantom series against its ground truth"
    }
}
