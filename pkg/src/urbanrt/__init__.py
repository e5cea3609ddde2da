"""urbanrt: deterministic urban ray-tracing simulator for multi-band MIMO coverage.

Generates ITU-statistical high-rise city layouts, traces multipath
propagation between rooftop base stations and street-level UEs, assembles
wideband MIMO channel impulse responses and evaluates SNR / SINR CDFs and
coverage probability under interference-free and full-interference
scenarios.
"""

from .antenna import (
    ArrayGeometry,
    BandBundle,
    ElementPattern,
    array_boresight_gain,
    element_gain,
    elements_for_band,
    steering_vector,
)
from .channel import (
    ChannelImpulseResponse,
    assemble_channel,
    coherence_bandwidth,
    is_wideband,
    rms_delay_spread,
)
from .city import (
    Building,
    CityLayout,
    ItuUrbanParams,
    derive_layout_params,
    generate_city,
    load_city,
    sample_building_height,
    save_city,
    validate_city,
)
from .config import ScenarioConfig, desk_preset, load_config
from .materials import MATERIALS, Material, reflection_coefficient
from .metrics import (
    LinkSample,
    RadioConfig,
    average_interference_power,
    coverage_probability,
    empirical_cdf,
    sinr,
    snr,
)
from .raytrace import (
    PropagationPath,
    TraceConfig,
    diffraction_loss,
    line_of_sight,
    trace_paths,
)
from .scenario import (
    Deployment,
    InterferenceMode,
    UePopulation,
    associate,
    density_to_isd,
    drop_ues,
    evaluate_scenario,
    place_bs_hex,
    sweep_density,
)

__version__ = "0.1.0"
