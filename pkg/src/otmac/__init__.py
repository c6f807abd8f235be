"""Oblivious transfer over noisy point-to-point and two-sender channels.

Protocol simulation with honest-but-curious and malicious parties, exact and
Monte-Carlo security evaluation, and numerical rate-region computation.
"""

__version__ = "0.1.0"

from .probcore import (  # noqa: F401
    BitString,
    Distribution,
    JointDistribution,
    SeededRng,
    condition,
    marginalize,
    product,
    sample,
)
from .channels import (  # noqa: F401
    Correlation,
    MacKernel,
    SbcParams,
    adder_mac,
    bec,
    identity_mac,
    noisy_adder_mac,
    special_bemac,
    su_sbc,
    su_sbc_full,
    transmit,
)
from .capacity import (  # noqa: F401
    RateRegion,
    max_over_products,
    region_hbc_capacity,
    region_hbc_upper,
    region_malicious,
    region_ska_upper,
)
from .protocol import (  # noqa: F401
    OtOutcome,
    ProtocolParams,
    ReceiverChoice,
    SenderInput,
    mac_ot,
    ot_to_fct,
    two_party_ot,
)
