"""Plan-driven attention for event recognition.

A pixel dynamics network turns recognized plans (sequences of clustered
motion primitives) into per-pixel action filters; convolving them with a
masked frame and pooling the resulting offsets yields count maps of where
object points are headed, summarized into a top-down attention map that an
LSTM event classifier consumes alongside bottom-up saliency.
"""

__version__ = "0.1.0"

from .amp import (  # noqa: F401
    AmpDistribution,
    AmpLibrary,
    RecognizedPlan,
    assign_distribution,
    decode_amp,
    kmeans_fit,
    merge_consecutive,
)
from .config import RunConfig, load_config  # noqa: F401
from .features import FeatureVector, VideoTube, hod, hog, tube_features  # noqa: F401
from .numerics import (  # noqa: F401
    LstmParams,
    conv2d,
    finite_diff_grad,
    kmax_pool,
    lstm_step,
    make_rng,
    sigmoid,
)
from .pdn import (  # noqa: F401
    Acf,
    MaskedImage,
    PdnParams,
    PrdaMap,
    acf_convolve,
    belief_update_oracle,
    build_masked_image,
    generate_acfs,
    generate_prda,
    pdn_forward,
    translation_pool,
)
from .pipeline import (  # noqa: F401
    ClassifierParams,
    Models,
    classify_event,
    combine_attention,
    compute_bua,
    evaluate_map,
    segment_glimpses,
    train_er,
)
from .planrec import AffinityModel, recognize, train_affinity  # noqa: F401
from .synth import EventSample, SceneConfig, synth_generate  # noqa: F401
