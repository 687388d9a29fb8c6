#pragma once

#include "hogtrack/detector.hpp"
#include "hogtrack/error.hpp"
#include "hogtrack/eval.hpp"
#include "hogtrack/fft.hpp"
#include "hogtrack/geometry.hpp"
#include "hogtrack/hog.hpp"
#include "hogtrack/image.hpp"
#include "hogtrack/io.hpp"
#include "hogtrack/netpbm.hpp"
#include "hogtrack/parallel.hpp"
#include "hogtrack/random.hpp"
#include "hogtrack/saliency.hpp"
#include "hogtrack/svm.hpp"
#include "hogtrack/tracker.hpp"
