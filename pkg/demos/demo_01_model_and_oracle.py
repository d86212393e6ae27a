"""
Models and the exact oracle
===========================

A model assigns each variable a Boolean function of earlier variables in
algebraic normal form, flipped by independent Bernoulli noise.  Because the
noise determines the observation, the joint distribution can be enumerated
exactly for small ``d``.
"""

# %%
# Build the four-variable example: x2 copies x1, x3 is an AND, x4 an OR.
from bexsam import example_model, exact_conditional, exact_joint, format_model, noise_marginals

model = example_model(noise_probs=(0.2, 0.1, 0.3, 0.15))
print(format_model(model))
print("parents:", {model.names[i]: [model.names[j] for j in model.parents(i)] for i in range(model.d)})
print("sinks:", [model.names[i] for i in model.sinks()])

# %%
# The exact joint distribution, as a frequency table scaled to 10000 samples.
joint = exact_joint(model)
table = joint.to_table(model.names, scale=10_000)
print(table)
print("p(x4=1) =", round(joint.marginal(3), 4))

# %%
# A sink's conditional probability is the same noise level (or its
# complement) under every control; a non-sink's is not.
for given in ({0: 0, 1: 0, 2: 0}, {0: 1, 1: 1, 2: 1}):
    print("x4 | ", given, "->", round(exact_conditional(model, 3, given, joint), 4))
for given in ({0: 0, 1: 0, 3: 0}, {0: 1, 1: 1, 3: 1}):
    print("x3 | ", given, "->", round(exact_conditional(model, 2, given, joint), 4))

# %%
# XOR noise and OR noise give nearly the same marginal when it is small.
print(noise_marginals(0.05, 0.05))
