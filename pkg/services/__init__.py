# Services layer: instance handling, solvers, oracle and bench harness
