#pragma once

#include <stdexcept>
#include <string>

namespace forge {

enum class Errc {
    invalid_argument,
    stencil_out_of_domain,
    chi_boundary,
    degenerate_v_metric,
    degenerate_h_metric,
    phi_star_zero,
    kink_guard,
    lambda_zero,
    eta5_star_zero,
    f_star_zero,
    f_equals_f0,
    curl_violation,
    chi_range,
    nonconvergence,
    no_root,
    horizon_domain,
    non_harmonic,
    zero_polarization,
    zero_factor,
    unbound_seed,
    parse,
    unknown_identifier,
    role_mismatch,
    io,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace forge
