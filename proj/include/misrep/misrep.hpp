#pragma once

// Umbrella header.

#include "misrep/acf.hpp"
#include "misrep/arma.hpp"
#include "misrep/arma_fit.hpp"
#include "misrep/bootstrap.hpp"
#include "misrep/detect.hpp"
#include "misrep/error.hpp"
#include "misrep/misreport.hpp"
#include "misrep/mixture.hpp"
#include "misrep/optimize.hpp"
#include "misrep/parallel.hpp"
#include "misrep/rng.hpp"
#include "misrep/series.hpp"
#include "misrep/simstudy.hpp"
