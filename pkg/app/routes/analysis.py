# app/routes/analysis.py

from fastapi import APIRouter

from app.dependencies import domain_errors
from app.repository.artifacts import matrix_from_schema
from app.schemas.analysis import (
    CheckRequest, FastSimRequest, MeanFieldRequest, SimulateRequest, SimulateResponse, TrajectoryResponse,
    VerdictResponse,
)
from app.services.analysis import (
    check_pctl, fast_simulation, meanfield_trajectory, parse_occupancy, parse_pctl, point_mass,
)
from app.services.exactsim import PopulationConfig, monte_carlo
from app.services.labels import label_states, parse_label_file

router = APIRouter(prefix="/analysis", tags=["analysis"])


@router.post("/meanfield", response_model=TrajectoryResponse)
def meanfield(body: MeanFieldRequest):
    """
    Mean-field trajectory mu(0..T).
    """
    with domain_errors():
        matrix, _ = matrix_from_schema(body.matrix)
        trajectory = meanfield_trajectory(matrix, parse_occupancy(body.init, matrix), body.steps)
    return TrajectoryResponse(states=list(matrix.states), rows=trajectory.tolist())


@router.post("/fastsim", response_model=TrajectoryResponse)
def fastsim(body: FastSimRequest):
    """
    Distribution of one individual started in ``start``, evolving against
    the mean field.
    """
    with domain_errors():
        matrix, _ = matrix_from_schema(body.matrix)
        mu0 = parse_occupancy(body.init, matrix)
        trajectory = fast_simulation(matrix, mu0, point_mass(matrix, body.start), body.steps)
    return TrajectoryResponse(states=list(matrix.states), rows=trajectory.tolist())


@router.post("/check", response_model=VerdictResponse)
def check(body: CheckRequest):
    """
    Bounded PCTL at one state and time. Labels come from the label file
    when given, from the matrix document otherwise.
    """
    with domain_errors():
        matrix, stored = matrix_from_schema(body.matrix)
        labels = label_states(parse_label_file(body.labels), matrix) if body.labels else stored
        verdict = check_pctl(
            matrix, labels, parse_occupancy(body.init, matrix), body.state, body.time, parse_pctl(body.formula),
        )
    return VerdictResponse(**verdict.as_dict())


@router.post("/simulate", response_model=SimulateResponse)
def simulate(body: SimulateRequest):
    """
    Exact population simulation; returns the mean and standard deviation of
    the empirical occupancy over replicas.
    """
    with domain_errors():
        matrix, _ = matrix_from_schema(body.matrix)
        cfg0 = PopulationConfig.from_occupancy(parse_occupancy(body.init, matrix), body.N)
        result = monte_carlo(matrix, cfg0, body.steps, body.replicas, body.seed)
    return SimulateResponse(
        seed=body.seed, states=list(matrix.states), mean=result.mean.tolist(), sd=result.sd.tolist(),
    )
