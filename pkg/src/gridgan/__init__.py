"""gridgan: grid-structured noise injection for GAN generators.

The latent space is a grid of independently sampled per-cell codes plus
shared region/global codes and a separate style code; each piece is mapped
to the generator's input tensor by its own parameters, which confines every
code's influence to its declared cells and makes local, regional, global and
style edits independent of one another.
"""

from .structure import (
    CellSelection,
    NoiseStructure,
    ScaleTarget,
    SharedScale,
    SlotMask,
    STYLE,
    StructureError,
    manual_partition,
    per_column_partition,
    per_pixel_partition,
    per_row_partition,
)
from .latent import (
    EditError,
    StructuredLatent,
    cell_code,
    flatten,
    from_json,
    interpolate,
    latent_digest,
    replace,
    sample_latent,
    to_json,
    unflatten,
)
from .mapping import (
    StructuredInputMapping,
    assemble_dense,
    declared_influence,
    empirical_influence,
    map_dense,
    map_structured,
)
from .synthesis import (
    Generator,
    GeneratorConfig,
    ModelFailureError,
    StyleState,
    adain,
    cone_area,
    receptive_cone,
)
from .discriminator import Discriminator
from .training import TrainConfig, Trainer, TrainRun, TrainingDivergedError
from .checkpoint import CheckpointError, load_checkpoint, load_generator, save_checkpoint
from .metrics import (
    GaussianStats,
    GeneratorAdapter,
    MetricReport,
    fid,
    path_length,
    separability,
)
from .config import RunConfig
from .data import BatchStream, DatasetManifest, build_manifest, load_manifest

__version__ = "0.1.0"
