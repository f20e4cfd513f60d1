# %% [markdown]
# # When does a better fit give a better rule?
#
# Three nested questions, each answered by Monte Carlo:
# lower mean squared error (S0), lower squared error at every point (S1),
# and lower misclassification (S2). The last two need not follow from the first.

# %%
from hteitr import builtin_scenario, classify_point, membership_report

for name in ("scenario1", "scenario2"):
    r = membership_report("xlearner", "standard", builtin_scenario(name), m=800, n=40,
                          replications=50, seed=0)
    print(r.to_text())
    print()

# %% [markdown]
# Pointwise, a closer estimate can still pick the wrong sign when it
# crosses zero and the worse estimate overshoots on the correct side.

# %%
print(classify_point(1.0, 0.5, 2.0))
print(classify_point(1.0, -0.2, 1.9))
print(classify_point(1.0, 0.7, -0.1))
