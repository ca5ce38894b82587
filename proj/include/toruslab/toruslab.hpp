#pragma once

#include "toruslab/core.hpp"
#include "toruslab/energy.hpp"
#include "toruslab/fp.hpp"
#include "toruslab/orbit.hpp"
#include "toruslab/spectral.hpp"
#include "toruslab/walk.hpp"
