# %% [markdown]
# # Base learners: a global line and a local smoother
#
# OLS fits one straight line. LOESS fits a weighted line in a moving window
# of nearby points, so it can follow a step curve that OLS cannot.

# %%
import numpy as np

from hteitr import LoessConfig, evaluate, fit_loess, fit_ols

rng = np.random.default_rng(0)
x = rng.uniform(-1, 1, 400)
y = np.where((x >= -0.4) & (x < 0.5), 1.5, 1.0) + rng.normal(0, 0.01, x.size)

line = fit_ols(x, y)
smooth = fit_loess(x, y, LoessConfig(span=0.3))
print("ols params:", line.params["intercept"], line.params["slope"])

# %%
grid = np.linspace(-1, 1, 9)
print(" x      truth   ols     loess")
for g, t, o, s in zip(grid, np.where((grid >= -0.4) & (grid < 0.5), 1.5, 1.0), evaluate(line, grid),
                      evaluate(smooth, grid)):
    print(f"{g:5.2f}  {t:5.2f}  {o:6.3f}  {s:6.3f}")

# %% [markdown]
# LOESS never extrapolates: queries beyond the training range are clamped to
# the nearest end. Windows that collapse to a single x value fall back to
# a weighted mean, and `return_fallback` reports that.

# %%
print(evaluate(smooth, 5.0) == evaluate(smooth, x.max()))
value, fell_back = evaluate(smooth, 0.0, return_fallback=True)
print(value, fell_back)
