# Parameters/simulation.py
# Fixed value sets used by sampling, sweeps and tuning runs.

N_CHOICES = (3, 6, 12, 18)
ALPHA_CHOICES = (200.0, 250.0)
BETA_CHOICES = (0.0, 0.5, 1.0)

# hyper-parameter sweeps
PRUNE_RATES = (0.3, 0.5, 0.7)
DENOISE_STEPS = (3, 6, 12)
LR_GROUPS = {
    "default": (2e-7, 2e-6),    # (actor lr, critic lr)
    "fast": (1e-4, 1e-4),
}

SWEEP_AXES = ("N", "alpha", "beta")
TUNE_AXES = ("prune_rate", "denoise_steps", "lr_group")
SCHEMES = ("dynamic", "static", "random", "edmsac", "dmsac", "gsac")
VARIANTS = ("edmsac", "dmsac", "gsac")
