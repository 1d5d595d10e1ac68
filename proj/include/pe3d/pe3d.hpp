#pragma once

#include "pe3d/error.hpp"
#include "pe3d/env_model.hpp"
#include "pe3d/thread_pool.hpp"
#include "pe3d/tridiag.hpp"
#include "pe3d/operators.hpp"
#include "pe3d/parallel.hpp"
#include "pe3d/config.hpp"
#include "pe3d/marching.hpp"
#include "pe3d/farm.hpp"
#include "pe3d/tl_io.hpp"
#include "pe3d/selftest.hpp"
#include "pe3d/cli.hpp"
