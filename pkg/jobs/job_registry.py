from models.job_definitions import JobArgument, JobDefinition

_model_arguments = [
    JobArgument(
        name="noise",
        type="object",
        description="Innovation law: {kind, dim, params}",
    ),
    JobArgument(
        name="coefficients",
        type="object",
        description="Coefficient model: {regime, A, ...} (generator/rho/weights or alpha/p/slowly_varying)",
    ),
    JobArgument(
        name="scenario",
        type="object",
        description="Scenario tag S1-S4 or R1-R4 with optional a_exponent, a_psi_power, lambda_rv",
    ),
]

_simulation_argument = JobArgument(
    name="simulation",
    type="object",
    description="{n, M, replications, tilt}; M defaults to the coefficient radius A",
)

rate_eval_job = JobDefinition(
    name="rate-eval",
    description="Evaluates the cumulant limit at a partition with levels, or the path rate I(f) at a piecewise-linear path.",
    arguments=_model_arguments
    + [
        JobArgument(
            name="partition",
            type="object",
            description="{times, levels}; used when no path is given",
            required=False,
        ),
        JobArgument(
            name="path",
            type="object",
            description="{knots, values} of a piecewise-linear path starting at the origin",
            required=False,
        ),
        JobArgument(
            name="partition_times",
            type="array",
            description="Times for the finite-partition lower bound on the path rate",
            required=False,
        ),
    ],
)

conjugate_job = JobDefinition(
    name="conjugate",
    description="Λ*(x) of the innovation law, or the marginal rate of S_n/a_n when a scenario is given.",
    arguments=[
        _model_arguments[0],
        JobArgument(name="points", type="array", description="Points x, one per row"),
        JobArgument(
            name="scenario",
            type="object",
            description="Switches to the marginal rate; needs 'coefficients' too",
            required=False,
        ),
    ],
)

gauss_rate_job = JobDefinition(
    name="gauss-rate",
    description="Γ*_α for the Gaussian limit G_Σ on a ladder of uniform grids.",
    arguments=[
        JobArgument(name="sigma", type="matrix", description="Covariance Σ (d×d, or a scalar)"),
        JobArgument(name="alpha", type="float", description="Memory exponent in (1/2, 1]"),
        JobArgument(name="mode", type="string", description="variational or closed_form", required=False),
        JobArgument(name="cells", type="array", description="Grid sizes m", required=False),
        JobArgument(name="target", type="string", description="'unit' or 'path'", required=False),
    ],
)

verify_limits_job = JobDefinition(
    name="verify-limits",
    description="Prelimit cumulant sums over a grid of n against their limit.",
    arguments=_model_arguments
    + [
        JobArgument(name="partition", type="object", description="{times, levels}"),
        JobArgument(name="n_grid", type="array", description="Values of n"),
        JobArgument(name="half_width", type="int", description="Window half-width A_n", required=False),
        JobArgument(name="quadrature", type="object", description="{x_max, tol, tail, limit}", required=False),
    ],
)

simulate_job = JobDefinition(
    name="simulate",
    description="Simulates the step and polygonal partial-sum paths.",
    arguments=_model_arguments + [_simulation_argument],
)

tail_job = JobDefinition(
    name="tail",
    description="Estimates P(S_n/a_n > x) directly, by exponential tilting, or exactly for Gaussian innovations.",
    arguments=_model_arguments
    + [
        _simulation_argument,
        JobArgument(name="x", type="float", description="Level x of the event"),
        JobArgument(name="method", type="string", description="direct, tilted or exact-gaussian", required=False),
        JobArgument(name="n_grid", type="array", description="Values of n, one row each", required=False),
    ],
)

speed_scan_job = JobDefinition(
    name="speed-scan",
    description="−log P(S_n/a_n > x) over a grid of n against the speed b_n.",
    arguments=_model_arguments
    + [
        _simulation_argument,
        JobArgument(name="x", type="float", description="Level x of the event"),
        JobArgument(name="n_grid", type="array", description="Values of n"),
    ],
)

pi_check_job = JobDefinition(
    name="pi-check",
    description="Truncated membership test for the admissible level sets.",
    arguments=[
        _model_arguments[0],
        _model_arguments[1],
        JobArgument(name="partition", type="object", description="{times, levels}"),
        JobArgument(name="n_max", type="int", description="Largest n probed", required=False),
        JobArgument(name="j_max", type="int", description="Largest |j| probed", required=False),
    ],
    produces_series=False,
)

JOBS = {
    job.name: job
    for job in (
        rate_eval_job,
        conjugate_job,
        gauss_rate_job,
        verify_limits_job,
        simulate_job,
        tail_job,
        speed_scan_job,
        pi_check_job,
    )
}
