#pragma once

#include "kernelgamma/bench.hpp"
#include "kernelgamma/dataset.hpp"
#include "kernelgamma/dmm.hpp"
#include "kernelgamma/error.hpp"
#include "kernelgamma/geometry.hpp"
#include "kernelgamma/kernel.hpp"
#include "kernelgamma/kos.hpp"
#include "kernelgamma/serialize.hpp"
#include "kernelgamma/svm.hpp"
#include "kernelgamma/synthetic.hpp"
#include "kernelgamma/tuning.hpp"
