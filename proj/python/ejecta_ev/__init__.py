"""Asteroid-ejecta event-camera simulation and tracking toolkit."""

from ._core import (  # noqa: F401
    CameraModel,
    DvsConfig,
    ScenarioConfig,
    TrackParams,
    __version__,
    accumulate,
    angular_radius_px,
    denoise,
    emulate,
    load_scenario,
    log_intensity,
    project,
    propagate,
    read_evt1,
    render_event_frame,
    render_sequence,
    single_particle_scenario,
    spinning_dot,
    track_stream,
    write_evt1,
)
