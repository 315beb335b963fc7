#ifndef HSIKME_HPP
#define HSIKME_HPP

#include "hsikme/embedding.hpp"
#include "hsikme/envi.hpp"
#include "hsikme/error.hpp"
#include "hsikme/image.hpp"
#include "hsikme/matrix_io.hpp"
#include "hsikme/metrics.hpp"
#include "hsikme/morphology.hpp"
#include "hsikme/parallel.hpp"
#include "hsikme/pipeline.hpp"
#include "hsikme/random.hpp"
#include "hsikme/rff.hpp"
#include "hsikme/svm.hpp"
#include "hsikme/synth.hpp"
#include "hsikme/theory.hpp"

#endif // HSIKME_HPP
