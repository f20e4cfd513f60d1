# %% [markdown]
# # Scenarios and trial data
#
# Two step-function scenarios ship with the package. Both share the control
# curve; they differ only in how far the treated curve sits above it.

# %%
import numpy as np

from hteitr import builtin_scenario, generate, read_csv, true_cate, write_csv

s1 = builtin_scenario("scenario1")
s2 = builtin_scenario("scenario2")
print(s1)
print(s2)

# %% [markdown]
# The effect is constant inside each interval, so a handful of points shows
# the whole curve.

# %%
x = np.array([-0.9, -0.4, 0.0, 0.49, 0.5, 0.9])
for spec in (s1, s2):
    print(spec.name, true_cate(spec, x))

# %% [markdown]
# A trial is a fixed-size randomized sample: `m` control units, `n` treated.
# The same seed always produces the same arrays.

# %%
data = generate(s1, m=200, n=10, seed=42)
print(data.m, data.n, data.x[:3], data.a[-3:])
assert data == generate(s1, m=200, n=10, seed=42)

# %%
from pathlib import Path
import tempfile

path = Path(tempfile.mkdtemp()) / "trial.csv"
write_csv(data, path)
print(path.read_text().splitlines()[:3])
assert read_csv(path) == data
