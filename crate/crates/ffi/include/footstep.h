#ifndef FOOTSTEP_H
#define FOOTSTEP_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  FS_STATUS_INVALID_ARGUMENT = 2,
  FS_STATUS_NO_STEPPABLE_REGION = 3,
  FS_STATUS_PARSE_ERROR = 4,
  FS_STATUS_NON_MONOTONIC_TIME = 5,
  FS_STATUS_OUT_OF_RANGE = 6,
  FS_STATUS_PANIC = 7,
} FsStatus;

typedef enum FsFootSide {
  FS_FOOT_SIDE_LEFT = 0,
  FS_FOOT_SIDE_RIGHT = 1,
} FsFootSide;

typedef enum FsStepEvent {
  FS_STEP_EVENT_NONE = 0,
  FS_STEP_EVENT_STARTED = 1,
  FS_STEP_EVENT_FINISHED = 2,
} FsStepEvent;

/**
 * Elevation grid (opaque).
 */
typedef struct FsHeightMap FsHeightMap;

/**
 * Two-foot step retargeter (opaque).
 */
typedef struct FsRetargeter FsRetargeter;

/**
 * Sampled swing trajectory (opaque).
 */
typedef struct FsSwing FsSwing;

typedef struct FsSafetyLimits {
  double max_stride;
  double max_yaw;
  double min_lateral_separation;
  double max_inward_yaw;
} FsSafetyLimits;

typedef struct FsPose2 {
  double x;
  double y;
  double yaw;
} FsPose2;

typedef struct FsFootstep {
  enum FsFootSide side;
  double x;
  double y;
  double yaw;
  double height;
} FsFootstep;

typedef struct FsSwingSample {
  double position[3];
  double velocity[3];
  double yaw;
  /**
   * Non-zero when the requested time was clamped into the swing.
   */
  uint8_t clamped;
} FsSwingSample;

/**
 * One tracker reading: world position, yaw, linear velocity and yaw rate.
 */
typedef struct FsTrackerSample {
  double time;
  double position[3];
  double yaw;
  double velocity[3];
  double yaw_rate;
} FsTrackerSample;

typedef struct FsRetargetOutput {
  enum FsStepEvent event;
  /**
   * Non-zero when `stride`, `yaw` and `landing_factor` are set.
   */
  uint8_t has_estimate;
  double stride;
  double yaw;
  double landing_factor;
  /**
   * Non-zero when `footstep` is set.
   */
  uint8_t has_footstep;
  struct FsFootstep footstep;
} FsRetargetOutput;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *fs_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fs_version(void);

struct FsSafetyLimits fs_default_limits(void);

/**
 * Clamps a stance-frame footstep for `side` into the safety envelope.
 *
 * # Safety
 * `limits` and `out` must be valid pointers.
 */
enum FsStatus fs_clamp_footstep(const struct FsSafetyLimits *limits,
                                enum FsFootSide side,
                                struct FsPose2 candidate,
                                struct FsPose2 *out);

/**
 * Creates an all-unknown (NaN) world map with `width × height` cells.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FsStatus fs_heightmap_new(size_t width,
                               size_t height,
                               double resolution,
                               double origin_x,
                               double origin_y,
                               struct FsHeightMap **out);

/**
 * Parses a map from HM1 text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FsStatus fs_heightmap_from_hm1(const char *text, struct FsHeightMap **out);

/**
 * # Safety
 * `map` must come from `fs_heightmap_new`/`fs_heightmap_from_hm1` and not be
 * used afterwards. Null is ignored.
 */
void fs_heightmap_free(struct FsHeightMap *map);

/**
 * # Safety
 * `map` must be a live handle.
 */
enum FsStatus fs_heightmap_set(struct FsHeightMap *map, size_t ix, size_t iy, double value);

/**
 * # Safety
 * `map` must be a live handle and `out` a valid pointer.
 */
enum FsStatus fs_heightmap_get(const struct FsHeightMap *map, size_t ix, size_t iy, double *out);

/**
 * Moves `target` to the lowest-cost nearby pose on `map` using the default
 * weights, foot size and search window. `out_cost` may be null.
 *
 * # Safety
 * `map` must be a live handle; `target` and `out` valid pointers.
 */
enum FsStatus fs_optimize_footstep(const struct FsHeightMap *map,
                                   const struct FsFootstep *target,
                                   struct FsFootstep *out,
                                   double *out_cost);

/**
 * Plans a swing from `start` to `goal` (xyz) with the given clearance and
 * duration and default waypoint fractions.
 *
 * # Safety
 * `start` and `goal` must point to three doubles; `out` must be valid.
 */
enum FsStatus fs_swing_new(const double *start,
                           const double *goal,
                           double swing_height,
                           double duration,
                           struct FsSwing **out);

/**
 * # Safety
 * `swing` must be a live handle and `out` a valid pointer.
 */
enum FsStatus fs_swing_sample(const struct FsSwing *swing, double t, struct FsSwingSample *out);

/**
 * # Safety
 * `swing` must be a live handle.
 */
double fs_swing_duration(const struct FsSwing *swing);

/**
 * # Safety
 * `swing` must come from `fs_swing_new` and not be used afterwards. Null is
 * ignored.
 */
void fs_swing_free(struct FsSwing *swing);

/**
 * Retargeter with default settings.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FsStatus fs_retargeter_new(struct FsRetargeter **out);

/**
 * Feeds one tracker sample. Times must increase strictly per foot.
 *
 * # Safety
 * `retargeter` must be a live handle; `sample` and `out` valid pointers.
 */
enum FsStatus fs_retargeter_push(struct FsRetargeter *retargeter,
                                 enum FsFootSide side,
                                 const struct FsTrackerSample *sample,
                                 struct FsRetargetOutput *out);

/**
 * # Safety
 * `retargeter` must come from `fs_retargeter_new` and not be used
 * afterwards. Null is ignored.
 */
void fs_retargeter_free(struct FsRetargeter *retargeter);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOOTSTEP_H */
