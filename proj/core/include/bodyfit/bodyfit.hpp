#pragma once

#include "bodyfit/annotation.hpp"
#include "bodyfit/body_model.hpp"
#include "bodyfit/body_template.hpp"
#include "bodyfit/camera.hpp"
#include "bodyfit/deform_learn.hpp"
#include "bodyfit/errors.hpp"
#include "bodyfit/geom.hpp"
#include "bodyfit/keypoints.hpp"
#include "bodyfit/mesh_export.hpp"
#include "bodyfit/metrics.hpp"
#include "bodyfit/pose_prior.hpp"
#include "bodyfit/prior_train.hpp"
#include "bodyfit/regist_losses.hpp"
#include "bodyfit/registration.hpp"
#include "bodyfit/regressor.hpp"
#include "bodyfit/run_config.hpp"
#include "bodyfit/synth.hpp"
