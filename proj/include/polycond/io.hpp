#pragma once

// Text formats: polynomials as `alpha_1 ... alpha_n : coefficient` lines,
// systems as a `n=<n> degrees=<d1,...>` header with `---`-separated blocks,
// subspaces as a `n=<n> d=<d> m=<m>` header with the basis polynomials.
// Doubles are written in shortest round-trip form.

#include "polycond/poly.hpp"

#include <map>
#include <string>

namespace polycond {

class PolySubspace;

std::string format_double(double v);

std::string polynomial_to_string(const HomogeneousPolynomial& p);
std::string system_to_string(const PolynomialSystem& P);
PolynomialSystem system_from_string(const std::string& text);
PolynomialSystem load_system(const std::string& path);
void save_system(const std::string& path, const PolynomialSystem& P);

std::string subspace_to_string(const PolySubspace& F);
PolySubspace subspace_from_string(const std::string& text);
PolySubspace load_subspace(const std::string& path);
void save_subspace(const std::string& path, const PolySubspace& F);

// line-based `key = value`; '#' starts a comment
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config(const std::string& path);

}  // namespace polycond
