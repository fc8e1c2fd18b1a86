#include "blockfa/experiment.hpp"

namespace blockfa {

namespace {

Preset make(std::string name, std::string description, std::string body) {
  std::string text = "name = " + name + "\ndescription = \"" + description + "\"\n" + body;
  return {std::move(name), std::move(description), std::move(text)};
}

std::vector<Preset> build() {
  std::vector<Preset> p;
  p.push_back(make("fig1",
                   "Fig. 1: Im of the top-left entry of f(z) err_k(z) near the spectrum, b = 1,2,3,4,8,16; "
                   "desk scale: k = 10, 60x60 grid",
                   R"(kind = field_im
problem = linspace
function = sqrt
w = 0
block_size = 1, 2, 3, 4, 8, 16
k = 10
[grid]
re_min = 0
re_max = 1
im_min = 0
im_max = 1
nx = 60
ny = 60
)"));
  p.push_back(make("fig2",
                   "Fig. 2: slack ratio T(z) with w = lambda_min/100, b = 1,2,3,4,8,16; desk scale: k = 10, "
                   "60x60 grid",
                   R"(kind = field_slack
problem = linspace
function = sqrt
w = lambda_min/100
block_size = 1, 2, 3, 4, 8, 16
k = 10
[grid]
re_min = 0
re_max = 1
im_min = 0
im_max = 1
nx = 60
ny = 60
)"));
  p.push_back(make("fig3", "Fig. 3: Pac-Man contour geometry (O = lambda_min/100, R = 4 span, Theta = 3pi/4)",
                   R"(kind = contour
problem = linspace
contour.origin = lambda_min/100
contour.radius = 4*span
contour.theta = 0.75*pi
)"));
  p.push_back(make("fig4",
                   "Fig. 4: error, triangle inequality and computable bound over a 3x3 (R, Theta) grid, b = 4; "
                   "desk scale: k <= 60",
                   R"(kind = convergence
problem = linspace
function = sqrt
w = 0
block_size = 4
contour.origin = lambda_min/100
contour.radius = 1.1*span, 2*span, 4*span
contour.theta = 0.25*pi, 0.5*pi, 0.75*pi
k_max = 60
rtol = 1e-6
plot = panels
)"));
  p.push_back(make("fig5", "bound/error ratio heatmap at k=30",
                   R"(kind = convergence
problem = linspace
function = sqrt
w = 0
block_size = 4
contour.origin = lambda_min/100
contour.radius = 1.1*span, 1.5*span, 2*span, 2.5*span, 3*span, 4*span
contour.theta = 0.125*pi, 0.25*pi, 0.375*pi, 0.5*pi, 0.625*pi, 0.75*pi, 0.875*pi
k = 30
rtol = 1e-6
plot = heatmap
)"));
  p.push_back(make("fig6",
                   "Fig. 6: step function, b = 1,2,4,8, Pac-Man at 0 with R = 2 lambda_max, Theta = pi/2, "
                   "Frobenius norm; uses a synthetic indefinite diagonal with spectrum [-1,-0.05] U [0.05,1] "
                   "unless problem.path names the Wilson hopping matrix",
                   R"(kind = convergence
problem = wilson
problem.fallback = indefinite
problem.n = 1000
problem.gap = 0.05
problem.hi = 1
function = step
norm = frobenius
w = 0
spectrum = split
contour = two_sided
contour.origin = 0
contour.radius = 2*lambda_max
contour.theta = 0.5*pi
block_size = 1, 2, 4, 8
k_max = 100
rtol = 1e-6
)"));
  p.push_back(make("fig7",
                   "Fig. 7: quadratic-form error and bounds for f = 1/sqrt(x), b = 1,2,4,8, Pac-Man at 0 with "
                   "R = 2 lambda_max, Theta = pi/2; runs to convergence (stop_rtol 1e-12)",
                   R"(kind = quadratic_form
problem = linspace
function = inv_sqrt
w = 0
contour.origin = 0
contour.radius = 2*lambda_max
contour.theta = 0.5*pi
block_size = 1, 2, 4, 8
k_max = 80
stop_rtol = 1e-12
rtol = 1e-6
plot = panels
)"));
  p.push_back(make("fig8",
                   "Fig. 8: model problem (n = 500, kappa = 1e3, rho = 0.9), f = 1/sqrt(x), b = 4, with and "
                   "without reorthogonalization, Pac-Man at lambda_min/100 with R = 2, Theta = pi/100; runs to "
                   "convergence (stop_rtol 1e-12)",
                   R"(kind = convergence
problem = model
problem.n = 500
problem.kappa = 1e3
problem.rho = 0.9
function = inv_sqrt
w = lambda_min/100
contour.origin = lambda_min/100
contour.radius = 2
contour.theta = 0.01*pi
block_size = 4
reorth = true, false
k_max = 120
stop_rtol = 1e-12
fp = true
rtol = 1e-6
plot = panels
)"));
  p.push_back(make("appendixA",
                   "CG error estimate quality for lookahead d = 2,5,10, w = 0, b = 4, H - wI norm",
                   R"(kind = cg_estimate
problem = linspace
w = 0
block_size = 4
lookahead = 2, 5, 10
k_max = 100
stop_rtol = 1e-10
plot = panels
)"));
  p.push_back(make("blocksize",
                   "bound validity across block sizes 1, 2, 4 (f = sqrt, w = 0, Pac-Man O = lambda_min/100, "
                   "R = 4, Theta = 3pi/4, k <= 100)",
                   R"(kind = convergence
problem = linspace
function = sqrt
w = 0
contour.origin = lambda_min/100
contour.radius = 4
contour.theta = 0.75*pi
block_size = 1, 2, 4
k_max = 100
rtol = 1e-6
plot = panels
)"));
  return p;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build();
  return all;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw Error(ErrorKind::ParseError, "preset: unknown preset '" + name + "'");
}

}  // namespace blockfa
