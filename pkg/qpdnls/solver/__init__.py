from qpdnls.solver.state import FourierState, Trajectory
from qpdnls.solver.convolution import AlternatingConvolution, alternating_convolution
from qpdnls.solver.equation import FourierEquation, rhs
from qpdnls.solver.picard import iter_picard, linear_solution, picard_iterate, picard_limit
from qpdnls.solver.integrator import integrate
from qpdnls.solver.monitors import conserved_quantities, tail_mass, trajectory_monitors
from qpdnls.solver.tree_expansion import tree_term
