# Attosecond double-slit simulation defaults

# Atomic-unit conversions
HARTREE_EV = 27.211386
AU_TIME_AS = 24.188843265857
AU_INTENSITY_W_CM2 = 3.50945e16

# Pulse (850 nm, 1e14 W/cm^2, 6.5-cycle sin^2)
PULSE_DEFAULTS = {
    'wavelength_nm': 850.0,
    'intensity_w_cm2': 1.0e14,
    'n_cycles': 6.5,
    'cep': 0.0
}

# Argon, standard reference value (15.76 eV)
ATOM_DEFAULTS = {
    'ip': 0.5792,
    'rate_prefactor': 1.0
}

ENERGY_GRID_DEFAULTS = {
    'min_ev': 0.2,
    'max_ev': 20.0,
    'n_bins': 400
}

SCAN_DEFAULTS = {
    'n_cep': 32,
    'cep_values': None  # explicit list overrides n_cep
}

SEMICLASSICAL_DEFAULTS = {
    'samples_per_cycle': 400,
    'root_tolerance': 1e-12,
    'action_epsabs': 1e-10,
    'action_method': 'quadrature'  # or 'closed_form'
}

SADDLE_DEFAULTS = {
    'max_iterations': 100,
    'residual_tolerance': 1e-10,
    'dedup_distance': 1e-8,
    'coalescence_threshold': 1e-8,
    'continuation_steps': 24
}

TDSE_DEFAULTS = {
    'x_min': -600.0,
    'x_max': 600.0,
    'n_points': 16384,
    'steps_per_cycle': 2000,
    'gauge': 'length',
    'z': 1.0,
    'softening': 2.0,
    'match_ip': False,
    'drift_cycles': 2.0,
    'absorber_fraction': 0.1,
    'x_split': 50.0,
    'virtual_detector': True,
    'checkpoint_every': 0
}

ANALYSIS_DEFAULTS = {
    'band_min_ev': None,  # defaults to 0.2 * 2Up
    'band_max_ev': None   # defaults to 0.8 * 2Up
}

OUTPUT_DEFAULTS = {
    'out_dir': 'output',
    'model': 'semiclassical',
    'threads': 1
}

# Logging Configuration
LOGGING_CONFIG = {
    'level': 'INFO',
    'format': '%(asctime)s - %(levelname)s - %(message)s'
}

# Email Notification Settings
NOTIFY_CONFIG = {
    'recipients': [],
    'subject_template': 'Attosecond double-slit run - {command}'
}

SPEED_OF_LIGHT_AU = 137.035999084
BOHR_NM = 0.0529177210903
