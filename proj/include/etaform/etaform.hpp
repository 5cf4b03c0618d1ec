#pragma once

#include "etaform/common.hpp"
#include "etaform/numerics.hpp"
#include "etaform/form_algebra.hpp"
#include "etaform/symplectic.hpp"
#include "etaform/maslov.hpp"
#include "etaform/spectral_eta.hpp"
#include "etaform/families.hpp"
#include "etaform/superconnection.hpp"
#include "etaform/io.hpp"
