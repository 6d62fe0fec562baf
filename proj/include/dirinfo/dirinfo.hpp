// dirinfo.hpp
//
// Convenience header pulling in the whole library.

#pragma once

#include "dirinfo/seqspace.hpp"
#include "dirinfo/causal.hpp"
#include "dirinfo/channel.hpp"
#include "dirinfo/baa.hpp"
#include "dirinfo/estimators.hpp"
