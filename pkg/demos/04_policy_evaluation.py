# %% [markdown]
# # From effect estimates to treatment rules
#
# A rule treats whenever the estimated effect is nonnegative. It is scored by
# how often it disagrees with the best rule, and by its value: the mean
# response if everyone were treated according to it.

# %%
import numpy as np

from hteitr import (EvalGrid, analytic_value, builtin_scenario, constant_rule, emse, fit_standard,
                    fit_xlearner, generate, ipw_value, misclassification, optimal_rule, regret_report,
                    sign_rule)

for name in ("scenario1", "scenario2"):
    spec = builtin_scenario(name)
    train = generate(spec, 800, 40, seed=3)
    test = generate(spec, 1000, 50, seed=4)
    grid = EvalGrid.uniform(spec)
    print(f"{name}: best value {analytic_value(spec, optimal_rule(spec)):.3f}")
    for est in (fit_standard(train), fit_xlearner(train)):
        rule = sign_rule(est)
        r = regret_report(rule, est, spec, grid)
        print(f"  {est.method.value:9s} emse {emse(est, spec, grid):.5f}"
              f"  misclass {misclassification(rule, spec, grid):.3f}"
              f"  ipw {ipw_value(rule, test, 50 / 1050):.4f}  regret {r.regret:.4f}")

# %% [markdown]
# In the first scenario the effect is small and positive everywhere, so a
# biased estimate flips the sign and costs value. In the second the effect
# is large, both rules treat everyone, and the better fit buys nothing.

# %%
spec = builtin_scenario("scenario1")
print(analytic_value(spec, constant_rule(1)), analytic_value(spec, constant_rule(-1)))
