from prometheus_client import Counter, Histogram

LP_SOLVES = Counter("nonsig_lp_solves_total", "LP solves", ["method", "status"])
LP_PIVOTS = Histogram(
    "nonsig_lp_pivots",
    "Simplex pivots per solve (both phases)",
    buckets=[1, 5, 10, 25, 50, 100, 250, 500, 1000, 2500, 5000, 10000]
)

TRIALS = Counter("nonsig_trials_total", "Monte Carlo trials run", ["experiment"])
EXPERIMENT_LAT = Histogram(
    "nonsig_experiment_ms",
    "Experiment wall time in ms",
    ["experiment"],
    buckets=[10, 50, 100, 500, 1000, 5000, 10000, 30000, 60000, 300000]
)

# HTTP surface
REQS = Counter("nonsig_requests_total", "Total requests", ["route"])
FAILS = Counter("nonsig_failures_total", "Total failures", ["route", "reason"])
LAT = Histogram(
    "nonsig_latency_ms",
    "Latency in ms",
    ["route"],
    buckets=[5, 10, 25, 50, 100, 200, 500, 1000, 2000, 5000]
)
