"""Numerical laboratory for the Hoelder regularity of the pressure of
incompressible flows: Littlewood-Paley analysis, Hoelder-Zygmund norms,
torus and disk pressure solvers, collar geometry, reflection extensions
and a pseudodifferential parametrix."""

__version__ = "0.1.0"
