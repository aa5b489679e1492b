// Worked example: fields built from a scalar potential are invisible to
// boundary measurements, and the gauge split recovers the potential.
//
// A scalar lambda vanishing on the boundary induces the skew field
// f = L_{grad lambda}. Along any chord the transport solution rotates about
// the ray direction by lambda(x(t)), so the exit value is the identity and
// the linearized data vanish. A generic field of the same size leaves a
// clear footprint. The grid decomposition then splits a field into this
// invisible part and a gauge-free remainder.
#include <cstdio>

#include "ptomo/decompose.hpp"
#include "ptomo/families.hpp"
#include "ptomo/fields.hpp"
#include "ptomo/geometry.hpp"
#include "ptomo/transport.hpp"

using namespace ptomo;

int main() {
  const ScalarField lambda = lambda_flat_ball();  // (1 - |x|^2)^2, zero on the sphere
  const CallableField potential = potential_field(lambda);
  const BallDomain ball = BallDomain::unit(3);
  const auto rays = sample_inward_boundary(ball, 5, 31);
  const CMat eye = CMat::identity(3);

  std::printf("potential field f = L_grad(lambda), lambda = (1 - |x|^2)^2\n\n");
  std::printf("%-28s %-14s %-14s\n", "ray", "|Phi - E|", "mid-chord vs rotation");
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const Ray& ray = rays[i];
    const TransportResult res = solve_transport(potential, ray, 1e-3, true);
    const std::size_t mid = res.ts.size() / 2;
    const CMat want = rotation_closed_form(lambda, ray.point(res.ts[mid]), ray.xi);
    std::printf("chord %zu (length %.3f)     %-14.3e %-14.3e\n", i, ray.length(),
                (res.exit() - eye).max_abs(), (res.us[mid] - want).max_abs());
  }

  const WeightField unit = WeightField::unit(3);
  double linear_pot = 0.0, linear_gen = 0.0;
  const GaussPolyMatrixField generic = random_skew_hermitian_field(7);
  for (const Ray& ray : rays) {
    linear_pot = std::max(linear_pot, solve_weighted_linear(potential, unit, unit, ray).max_abs());
    linear_gen = std::max(linear_gen, solve_weighted_linear(generic, unit, unit, ray).max_abs());
  }
  std::printf("\nlinear data, unit weights:  potential %.3e   generic skew field %.3e\n",
              linear_pot, linear_gen);

  // The gauge split takes the potential field back to its scalar: the
  // recovered lambda matches the analytic one at interior nodes.
  const GridSpec spec = GridSpec::centered_cube(33, 1.0);
  const DecomposeResult split = decompose(potential, spec, ball);
  double lam_err = 0.0, tilde_mass = 0.0;
  for (int ix = 0; ix < 33; ++ix)
    for (int iy = 0; iy < 33; ++iy)
      for (int iz = 0; iz < 33; ++iz) {
        const std::size_t id = spec.node_index(ix, iy, iz);
        if (!split.lambda.inside[id]) continue;
        lam_err = std::max(lam_err,
                           std::abs(split.lambda.values[id] - lambda.value(spec.node_point(ix, iy, iz))));
      }
  for (const cplx& v : split.tilde.values()) tilde_mass = std::max(tilde_mass, std::abs(v));
  std::printf("gauge split at 33^3:        max |lambda - recovered| %.3e, "
              "split remainder %.3e (both O(h^2))\n",
              lam_err, tilde_mass);
  std::printf("\nthe potential field carries no boundary signature; only its gauge-free "
              "remainder is observable\n");
  return 0;
}
