#pragma once

#include "nlsdecay/bootstrap.hpp"
#include "nlsdecay/config.hpp"
#include "nlsdecay/decay.hpp"
#include "nlsdecay/errors.hpp"
#include "nlsdecay/model.hpp"
#include "nlsdecay/pipeline.hpp"
#include "nlsdecay/solver.hpp"
#include "nlsdecay/spectral.hpp"
#include "nlsdecay/tridiagonal.hpp"
