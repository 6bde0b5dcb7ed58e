"""Slot-synchronous co-simulation of multi-robot state estimation over
modeled communication links.

Subpackages are layered bottom-up: finite-field coding (`gf_rlnc`), the
erasure link (`channel`), the three transport protocols (`transport`),
vehicle motion and geometry (`kinematics`), measurement generation
(`sensing`), delay-aware filtering (`estimation`), the two scenario
drivers (`cooploc`, `overtake`), and the run harness (`harness`, `cli`).
"""

__version__ = "0.1.0"
