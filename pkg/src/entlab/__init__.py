"""entlab: a numerical laboratory for bipartite entanglement-rate bounds.

Modules:
    operators -- dense Hermitian primitives (spectra, logs, traces, norms)
    rates     -- the rate/commutator functionals, closed-form maximization,
                 bound functions, and the interval-decomposition audit
    search    -- randomized generators and projected-gradient maximizers
    chains    -- gapped spin-chain paths, exact transport, entropy tracking
    cli       -- command-line front end
"""

__version__ = "0.1.0"
