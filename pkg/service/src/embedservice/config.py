from dataclasses import dataclass

DEFAULT_MODEL_TAG = "clip-vit-base-patch32"


@dataclass(frozen=True)
class ServiceConfig:
    """Runtime settings for the embedding service.

    model_tag selects the encoder backend: the default names the ViT-B/32
    dual-encoder (512-dim projections, loaded from pretrained weights);
    tags of the form hash-<dim> select the self-contained deterministic
    encoder used for hermetic testing. The advertised dimension always
    comes from the loaded encoder.
    """

    model_tag: str = DEFAULT_MODEL_TAG
    port: int = 8080
    device: str = "cpu"  # "cpu" or "accelerator"
    max_batch: int = 16

    def __post_init__(self) -> None:
        if self.device not in ("cpu", "accelerator"):
            raise ValueError(f"device must be 'cpu' or 'accelerator', got {self.device!r}")
        if self.max_batch < 1:
            raise ValueError("max_batch must be at least 1")
        if not (0 < self.port < 65536):
            raise ValueError(f"port out of range: {self.port}")
