"""
Flattening the HOCBF auxiliary chain
====================================

With linear class-K functions the chain Psi_i = Psi_{i-1}' + lambda_i Psi_{i-1}
is one linear combination of h and its derivatives. The weights are
elementary symmetric polynomials of the lambdas.
"""

# %%
from ttcbf import elem_sym_poly, flatten_hocbf, lambda_feasibility, psi_chain_coefficients

lams = (1.0, 2.0, 3.0)
print("e_k(1, 2, 3):", [elem_sym_poly(lams, k) for k in range(5)])

# %%
# Closed form versus unrolling the chain one step at a time.
print("flattened   :", flatten_hocbf(lams).coefficients)
for i in range(1, 4):
    print(f"Psi_{i} chain :", psi_chain_coefficients(lams, i))

# %%
# The double-integrator experiments use r = 2:  h'' + (l1 + l2) h' + l1 l2 h >= 0
print("(10, 0.5)   :", flatten_hocbf((10.0, 0.5)).coefficients)

# %%
# The first auxiliary function must start nonnegative, which limits lambda1 from
# below: lambda1 >= -h'(0) / h(0).
report = lambda_feasibility((2.1, 0.5), (95.8, -200.0))
check = report.checks[0]
print(f"lambda1 >= {check.bound:.3f}: lambda1 = {check.value} -> feasible = {report.feasible}")
print("lambda1 = 1.0 ->", lambda_feasibility((1.0, 0.5), (95.8, -200.0)).feasible)
