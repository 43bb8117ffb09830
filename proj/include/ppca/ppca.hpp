#pragma once

// Umbrella header for the Poisson PCA library.

#include "ppca/asymptotics.hpp"
#include "ppca/bench.hpp"
#include "ppca/csv.hpp"
#include "ppca/dimension.hpp"
#include "ppca/eigen_sym.hpp"
#include "ppca/errors.hpp"
#include "ppca/latent.hpp"
#include "ppca/matrix.hpp"
#include "ppca/moments.hpp"
#include "ppca/nelder_mead.hpp"
#include "ppca/parallel.hpp"
#include "ppca/params_json.hpp"
#include "ppca/rng.hpp"
#include "ppca/sampler.hpp"
#include "ppca/spectral.hpp"
#include "ppca/svg.hpp"
#include "ppca/types.hpp"
