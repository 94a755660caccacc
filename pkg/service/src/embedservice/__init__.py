from .app import create_app
from .config import DEFAULT_MODEL_TAG, ServiceConfig
from .encoders import (
    ClipDualEncoder,
    EncoderLoadError,
    HashProjectionEncoder,
    ImageDecodeError,
    build_encoder,
)

__version__ = "0.1.0"
