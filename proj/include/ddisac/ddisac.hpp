#pragma once

#include "ddisac/ambiguity.hpp"
#include "ddisac/channel.hpp"
#include "ddisac/error.hpp"
#include "ddisac/fft.hpp"
#include "ddisac/frames.hpp"
#include "ddisac/matrix.hpp"
#include "ddisac/parallel.hpp"
#include "ddisac/random.hpp"
#include "ddisac/sensing.hpp"
#include "ddisac/waveforms.hpp"
