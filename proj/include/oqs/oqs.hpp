#pragma once

#include "oqs/errors.hpp"
#include "oqs/model.hpp"
#include "oqs/eigensolver.hpp"
#include "oqs/spectral.hpp"
#include "oqs/tracking.hpp"
#include "oqs/eplocator.hpp"
#include "oqs/observables.hpp"
#include "oqs/harness.hpp"
#include "oqs/config.hpp"
#include "oqs/emit.hpp"
