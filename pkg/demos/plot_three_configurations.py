"""
Three co-aperture layouts at 94 GHz
===================================

The offset-fed reflector has no blockage but a wide lateral footprint.
Back-fed layout ``a`` hangs an IR fold mirror and its glass plate in front
of the feed; layout ``b`` puts an MMW-transparent IR film above the
sub-reflector. Every dimension below is a nominal default, not a measured
one; the scenario notes list them.
"""

import matplotlib
matplotlib.use("Agg")

from coaperture.scenarios import SCENARIO_IDS, build_scenario, compare, comparison_svgs

scenarios = [build_scenario(s) for s in SCENARIO_IDS]
for s in scenarios:
    print(s.id)
    for note in s.notes:
        print("   ", note)

# %%
# Run the GO aperture-field solver for the E- and H-plane cuts of each layout

report = compare(scenarios, [94.0], grid_n=512)
print(report.to_table())

# %%
# Ranking under the gain, sidelobe and co-aperture constraints

print(report.ranking_text())
for path in comparison_svgs(report, "."):
    print("wrote", path)
