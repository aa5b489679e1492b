// Worked example: membership in the kernel of the tensor line transform is
// detectable three independent ways, and the verdicts agree.
//
// Fields generated as symmetrized derivatives of a compactly supported
// vector potential integrate to zero along every line. The same membership
// shows up pointwise (six second-order constraint residuals), in frequency
// space (symbol relations on an FFT grid), and in the moment table. A
// generic symmetric field fails every one of these checks at O(1).
#include <cstdio>

#include "ptomo/families.hpp"
#include "ptomo/fields.hpp"
#include "ptomo/moments.hpp"
#include "ptomo/rng.hpp"
#include "ptomo/saintvenant.hpp"
#include "ptomo/xray.hpp"

using namespace ptomo;

namespace {

void survey(const char* name, const GaussPolyMatrixField& f, std::uint64_t line_seed) {
  const double radius = f.support_radius(1e-15);
  const auto lines = tangent_bundle_lines(10, radius, line_seed);
  double smax = 0.0;
  for (const TangentLine& line : lines)
    smax = std::max(smax, std::abs(s_transform(f, line, radius, 4096)));

  Rng rng(5);
  std::vector<Vec> pts;
  for (int k = 0; k < 50; ++k)
    pts.push_back(Vec(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
  const KernelResiduals kr = kernel_residuals(f, pts);
  double kr_max = 0.0;
  for (double r : kr.max_abs) kr_max = std::max(kr_max, r);

  const FourierResiduals fr = fourier_residuals(f, 64, 8.0);
  const MomentTable t = moments(f, 1, 8.0, 96);
  const ZeroOrderCheck z = zero_order_recovery_check(t);
  double combo_max = 0.0;
  for (const auto& c : first_order_combos(t)) combo_max = std::max(combo_max, std::abs(c.value));

  std::printf("%s\n", name);
  std::printf("  max |S[f]| over 10 lines      %.3e\n", smax);
  std::printf("  constraint residuals (space)  %.3e   verdict: %s\n", kr_max,
              kr.full_verdict ? "kernel member" : "not a member");
  std::printf("  constraint residuals (FFT)    %.3e   verdict: %s\n", fr.max_abs[0],
              fr.full_verdict ? "kernel member" : "not a member");
  std::printf("  zero-order moments            %.3e\n", z.max_abs);
  std::printf("  first-order combinations      %.3e\n\n", combo_max);
}

}  // namespace

int main() {
  std::printf("three detectors for line-transform kernel membership\n\n");
  survey("field from a seeded vector potential (kernel member)", random_kernel_field(42), 101);
  survey("generic symmetric field (control)", random_symmetric_field(43), 102);
  std::printf("kernel members vanish in every detector; the control fails all of them\n");
  return 0;
}
