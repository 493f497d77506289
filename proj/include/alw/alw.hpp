#pragma once

#include <alw/arithmetic_coder.hpp>
#include <alw/codec.hpp>
#include <alw/distributions.hpp>
#include <alw/error.hpp>
#include <alw/experiments.hpp>
#include <alw/numeric.hpp>
#include <alw/radius.hpp>
#include <alw/rate_distortion.hpp>
#include <alw/source_spec.hpp>
