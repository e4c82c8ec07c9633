#pragma once

// Everything in one include.

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/params.hpp"
#include "pdeinv/system.hpp"
#include "pdeinv/random.hpp"
#include "pdeinv/samplers.hpp"
#include "pdeinv/solvers/config.hpp"
#include "pdeinv/solvers/darcy.hpp"
#include "pdeinv/solvers/downsample.hpp"
#include "pdeinv/solvers/kdv.hpp"
#include "pdeinv/solvers/navier_stokes.hpp"
#include "pdeinv/solvers/reaction_diffusion.hpp"
#include "pdeinv/residual.hpp"
#include "pdeinv/inverse.hpp"
#include "pdeinv/io.hpp"
#include "pdeinv/manifest.hpp"
#include "pdeinv/splits.hpp"
#include "pdeinv/dataset.hpp"
#include "pdeinv/metrics.hpp"
#include "pdeinv/spectra.hpp"
#include "pdeinv/degradation.hpp"
