#!/usr/bin/env python3
"""Reference values for the C++ test suites, computed independently with mpmath.

Run from the repo root:  python3 tests/oracles/compute_reference_values.py

Everything here is evaluated symbolically/at 50-digit precision straight from
the closed-form densities, so the numbers frozen into the C++ tests do not
share any code with the library being tested.
"""

import mpmath as mp

mp.mp.dps = 50


def lognormal_logpdf(y, mu, sigma):
    z = (mp.log(y) - mu) / sigma
    return -mp.log(y) - mp.log(sigma) - mp.log(2 * mp.pi) / 2 - z * z / 2


def normal_logpdf(x, mu, sigma):
    z = (x - mu) / sigma
    return -mp.log(sigma) - mp.log(2 * mp.pi) / 2 - z * z / 2


def cauchy_logpdf(x, scale):
    return -mp.log(mp.pi * scale) - mp.log(1 + (x / scale) ** 2)


def half_cauchy_logpdf(x, scale):
    return cauchy_logpdf(x, scale) + mp.log(2)


def log_mix(lam, lp1, lp2):
    return mp.log(lam * mp.e**lp1 + (1 - lam) * mp.e**lp2)


def show(label, value, digits=17):
    print(f"{label} = {mp.nstr(value, digits)}")


# ---------------------------------------------------------------------------
# scalar density reference points
# ---------------------------------------------------------------------------
show("lognormal_logpdf(1, 0, 1)", lognormal_logpdf(1, 0, 1))
show("lognormal_logpdf(e, 1, 1)", lognormal_logpdf(mp.e, 1, 1))
show("lognormal_logpdf(400, 6, 0.5)", lognormal_logpdf(400, 6, mp.mpf("0.5")))
show("log_mix(0.3, -2, -5)", log_mix(mp.mpf("0.3"), -2, -5))
show("cauchy_logpdf(0, 2.5)", cauchy_logpdf(0, mp.mpf("2.5")))
show("half_cauchy_logpdf(0+, 2.5)", half_cauchy_logpdf(0, mp.mpf("2.5")))
show("lognormal mean mu=6 sigma=0.4", mp.e ** (6 + mp.mpf("0.4") ** 2 / 2))
show("lognormal sd   mu=6 sigma=0.4",
     mp.sqrt((mp.e ** mp.mpf("0.16") - 1) * mp.e ** (12 + mp.mpf("0.16"))))
show("exp(6)", mp.e**6)

# ---------------------------------------------------------------------------
# six-trial toy data: (subject, item, condition, rt)
# ---------------------------------------------------------------------------
TRIALS = [
    (1, 1, +1, 350),
    (1, 2, -1, 420),
    (1, 3, +1, 380),
    (2, 1, -1, 500),
    (2, 2, +1, 310),
    (2, 3, -1, 450),
]

ZU = [mp.mpf("0.5"), mp.mpf("-0.3")]
ZW = [mp.mpf("0.2"), mp.mpf("-0.1"), mp.mpf("0.4")]


def ranef(i, j, sigma_u, sigma_w):
    return sigma_u * ZU[i - 1] + sigma_w * ZW[j - 1]


def standard_pointwise(beta1, beta2, se, su, sw):
    out = []
    for (i, j, x, y) in TRIALS:
        mu = beta1 + beta2 * x + ranef(i, j, su, sw)
        out.append(lognormal_logpdf(y, mu, se))
    return out


def overwriting_pointwise(beta, delta, prob_hi, prob_lo, se, se_slow, su, sw):
    out = []
    for (i, j, x, y) in TRIALS:
        mu = beta + ranef(i, j, su, sw)
        p = prob_lo if x == +1 else prob_hi
        out.append(log_mix(p, lognormal_logpdf(y, mu + delta, se_slow),
                           lognormal_logpdf(y, mu, se)))
    return out


def percolation_pointwise(beta, gamma, prob_perc, se, su, sw):
    out = []
    for (i, j, x, y) in TRIALS:
        mu = beta + ranef(i, j, su, sw)
        if x == +1:
            out.append(log_mix(prob_perc, lognormal_logpdf(y, mu + gamma, se),
                               lognormal_logpdf(y, mu, se)))
        else:
            out.append(lognormal_logpdf(y, mu, se))
    return out


def dump_pointwise(label, values):
    print(f"{label}:")
    for k, v in enumerate(values):
        print(f"  [{k}] {mp.nstr(v, 17)}")
    print(f"  sum {mp.nstr(mp.fsum(values), 17)}")


B = mp.mpf

dump_pointwise(
    "standard (beta1=6, beta2=-0.03, se=0.4, su=0.2, sw=0.1)",
    standard_pointwise(B(6), B("-0.03"), B("0.4"), B("0.2"), B("0.1")))

hom = overwriting_pointwise(B(6), B("0.3"), B("0.35"), B("0.15"),
                            B("0.35"), B("0.35"), B("0.2"), B("0.1"))
dump_pointwise("homogeneous (beta=6, delta=0.3, ph=0.35, pl=0.15, se=0.35)", hom)

het = overwriting_pointwise(B(6), B("0.3"), B("0.35"), B("0.15"),
                            B("0.35"), B("0.6"), B("0.2"), B("0.1"))
dump_pointwise("heterogeneous (same, sigmap_e=0.6)", het)

perc = percolation_pointwise(B(6), B("-0.25"), B("0.2"),
                             B("0.35"), B("0.2"), B("0.1"))
dump_pointwise("percolation (beta=6, gamma=-0.25, pp=0.2, se=0.35)", perc)

# ---------------------------------------------------------------------------
# heterogeneous toy: full log prior / jacobian / posterior over the
# unconstrained vector (exp for sds and delta, logit for probabilities,
# identity for beta and the standardized random-effect innovations)
# ---------------------------------------------------------------------------
beta, delta = B(6), B("0.3")
ph, pl = B("0.35"), B("0.15")
se, sep, su, sw = B("0.35"), B("0.6"), B("0.2"), B("0.1")

log_prior = (cauchy_logpdf(beta, B("2.5")) + cauchy_logpdf(delta, B("2.5"))
             + 0 + 0  # Beta(1,1) terms
             + half_cauchy_logpdf(se, B("2.5")) + half_cauchy_logpdf(sep, B("2.5"))
             + half_cauchy_logpdf(su, B("2.5")) + half_cauchy_logpdf(sw, B("2.5"))
             + mp.fsum(normal_logpdf(z, 0, 1) for z in ZU + ZW))
show("het toy log_prior", log_prior)

log_jac = (mp.log(delta) + mp.log(se) + mp.log(sep) + mp.log(su) + mp.log(sw)
           + mp.log(ph) + mp.log(1 - ph) + mp.log(pl) + mp.log(1 - pl))
show("het toy log_jacobian", log_jac)

show("het toy log_posterior", mp.fsum(het) + log_prior + log_jac)

# unconstrained coordinates for the same point
unc = ([beta, mp.log(delta), mp.log(ph / (1 - ph)), mp.log(pl / (1 - pl)),
        mp.log(se), mp.log(sep), mp.log(su), mp.log(sw)] + ZU + ZW)
print("het toy unconstrained vector:")
for k, v in enumerate(unc):
    print(f"  [{k}] {mp.nstr(v, 17)}")
