#pragma once

#include <boost/rational.hpp>

#include <stdexcept>

namespace csns {

using Rational = boost::rational<long long>;

// Exact exponent bookkeeping for the p-dependent product law: the auxiliary
// integrabilities and the two signed sums its proof hinges on, all as
// rational identities with no floating point.
struct ProductLaw4Exponents {
    Rational p;
    Rational r0;      // 2p/(p-1)
    Rational p_bar;   // 1/p_bar = 1/3 + 1/(6p)
    Rational q1;      // 1/p_bar = 1/p + 1/q1  =>  q1 = 6p/(2p-5)
    Rational p1;      // 4p
    Rational q;       // 12p/(4p-1)
    Rational s_p1_plus_2_over_r0;    // = -1/(4p)
    Rational s_p_plus_s_q_plus_2_over_r0;  // = 7/(4p)
};

inline Rational sp_exponent_rational(const Rational& p) {
    return Rational(-1) + Rational(3) / p;
}

inline ProductLaw4Exponents product_law4_exponents(const Rational& p) {
    if (p <= Rational(3)) throw std::invalid_argument("product_law4_exponents: needs p > 3");
    ProductLaw4Exponents e;
    e.p = p;
    e.r0 = Rational(2) * p / (p - Rational(1));
    e.p_bar = Rational(1) / (Rational(1, 3) + Rational(1) / (Rational(6) * p));
    e.q1 = Rational(6) * p / (Rational(2) * p - Rational(5));
    e.p1 = Rational(4) * p;
    e.q = Rational(12) * p / (Rational(4) * p - Rational(1));
    e.s_p1_plus_2_over_r0 = sp_exponent_rational(e.p1) + Rational(2) / e.r0;
    e.s_p_plus_s_q_plus_2_over_r0 =
        sp_exponent_rational(p) + sp_exponent_rational(e.q) + Rational(2) / e.r0;
    return e;
}

// The identities the measured constants rely on; all must hold exactly.
inline bool product_law4_identities_hold(const Rational& p) {
    const auto e = product_law4_exponents(p);
    const bool holder_split_w = Rational(1) / e.p_bar == Rational(1) / p + Rational(1) / e.q1;
    const bool holder_split_v = Rational(1) / e.p_bar == Rational(1) / e.p1 + Rational(1) / e.q;
    const bool low_freq_decay = e.s_p1_plus_2_over_r0 == Rational(-1) / (Rational(4) * p);
    const bool remainder_sum = e.s_p_plus_s_q_plus_2_over_r0 == Rational(7) / (Rational(4) * p);
    const bool q1_positive = e.q1 > Rational(3);
    return holder_split_w && holder_split_v && low_freq_decay && remainder_sum && q1_positive;
}

}  // namespace csns
