from .losses import (
    PreferencePair,
    PreferenceSet,
    dpo_grad,
    dpo_loss,
    mutual_information,
    pair_margins,
    sft_grad,
    sft_loss,
    sft_loss_detail,
)
from .models import Conditioning, ToyModel, implicit_reward
from .training import (
    BoundsConfig,
    Objective,
    TrainResult,
    check_gradients,
    estimate_smoothness,
    train,
)
from .verify import (
    DEFAULT_PROP3_CASES,
    PROP1_CONFIG,
    BoundReport,
    Prop2Instance,
    Prop4Instance,
    build_preferences_from_reference,
    default_prop1_world,
    default_prop2_instance,
    default_prop3_world,
    default_prop4_instance,
    pair_restricted_nll,
    simulate_hallucinations,
    verify_prop1,
    verify_prop2,
    verify_prop3,
    verify_prop4,
    worlds_with_information,
)
from .worlds import (
    ToyWorld,
    hallucination_world,
    independent_world,
    one_bit_channel_world,
    random_world,
    tied_preference_world,
)

__all__ = [
    "PreferencePair",
    "PreferenceSet",
    "dpo_grad",
    "dpo_loss",
    "mutual_information",
    "pair_margins",
    "sft_grad",
    "sft_loss",
    "sft_loss_detail",
    "Conditioning",
    "ToyModel",
    "implicit_reward",
    "BoundsConfig",
    "Objective",
    "TrainResult",
    "check_gradients",
    "estimate_smoothness",
    "train",
    "DEFAULT_PROP3_CASES",
    "PROP1_CONFIG",
    "BoundReport",
    "Prop2Instance",
    "Prop4Instance",
    "build_preferences_from_reference",
    "default_prop1_world",
    "default_prop2_instance",
    "default_prop3_world",
    "default_prop4_instance",
    "pair_restricted_nll",
    "simulate_hallucinations",
    "verify_prop1",
    "verify_prop2",
    "verify_prop3",
    "verify_prop4",
    "worlds_with_information",
    "ToyWorld",
    "hallucination_world",
    "independent_world",
    "one_bit_channel_world",
    "random_world",
    "tied_preference_world",
]
