"""Meta-learned control of a pinching antenna under location uncertainty."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    ControlDecision,
    RadioEnv,
    Vec3,
    WaveguideGeometry,
    antenna_position,
    channel_coefficient,
    channel_gain,
    derive_radio_env,
    rate,
    secrecy_rate,
    snr,
)
from .errors import (  # noqa: E402
    ConfigError,
    DivergenceError,
    DomainError,
    InvalidParameterError,
    NumericalError,
    PinchMetaError,
    SingularityError,
)
from .rng import RngStream  # noqa: E402
from .stochastic import (  # noqa: E402
    UncertaintyDisk,
    expected_secrecy_rate,
    outage_probability,
    rate_samples,
    sample_user_position,
    secrecy_outage_probability,
)
from .tasks import (  # noqa: E402
    LossWeights,
    PilotSet,
    Requirements,
    Task,
    TaskDistribution,
    encode_features,
    outage_loss,
    sample_task,
    secrecy_loss,
    simulate_pilots,
    task_loss,
)
from .policy import (  # noqa: E402
    GradResult,
    MlpSpec,
    PolicyObjective,
    forward,
    hessian_vector_product,
    init_params,
    load_checkpoint,
    loss_and_grad,
    save_checkpoint,
)
from .meta import (  # noqa: E402
    MetaConfig,
    TrainTrace,
    inner_adapt,
    maml_meta_step,
    meta_train,
    online_adapt,
    reptile_meta_step,
)
from .baselines import (  # noqa: E402
    BaselineKind,
    BaselineSettings,
    conventional_optimize,
    min_power_for_reliability,
    power_only,
    scratch_learner,
    static_decision,
)
