#pragma once

#include "nahmkit/numkernel.hpp"
#include "nahmkit/moduli.hpp"
#include "nahmkit/fields.hpp"
#include "nahmkit/spectral.hpp"
#include "nahmkit/nahm.hpp"
#include "nahmkit/io.hpp"
#include "nahmkit/verify.hpp"
