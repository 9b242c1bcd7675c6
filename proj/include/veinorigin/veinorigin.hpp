#pragma once

#include "veinorigin/arch.hpp"
#include "veinorigin/checkpoint.hpp"
#include "veinorigin/clahe.hpp"
#include "veinorigin/error.hpp"
#include "veinorigin/image.hpp"
#include "veinorigin/manifest.hpp"
#include "veinorigin/metrics.hpp"
#include "veinorigin/network.hpp"
#include "veinorigin/optimizer.hpp"
#include "veinorigin/params.hpp"
#include "veinorigin/patches.hpp"
#include "veinorigin/patchset.hpp"
#include "veinorigin/png_io.hpp"
#include "veinorigin/report.hpp"
#include "veinorigin/rng.hpp"
#include "veinorigin/roi.hpp"
#include "veinorigin/sensor.hpp"
#include "veinorigin/split.hpp"
#include "veinorigin/stats.hpp"
#include "veinorigin/synthetic.hpp"
#include "veinorigin/tensor.hpp"
#include "veinorigin/train.hpp"
#include "veinorigin/zoo.hpp"
