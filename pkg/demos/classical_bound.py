"""The same three-detector analysis applied to classical light.

Coherent (Poissonian) light sits at g2 = 1 and thermal light above it,
in contrast with the heralded source.  A 1 us window is used so the
accidental triples are numerous enough to estimate.
"""

from qholo.coincidence import coincidence_report
from qholo.experiment import classical_run
from qholo.source_sim import Bunching, ClassicalSourceConfig

for bunching, tc in ((Bunching.POISSONIAN, 0.0), (Bunching.THERMAL, 2e-6)):
    cfg = ClassicalSourceConfig(2e5, bunching, coherence_time=tc, duration=20.0, seed=2)
    r = coincidence_report(*classical_run(cfg), 1_000_000)
    print(f"{bunching.value:10s} g2 = {r.g2:.3f} +- {r.g2_sigma:.3f}")
