"""Physical constants of the classic-control tasks.

Values are copied from the open-source Gym classic-control implementations
(gym/envs/classic_control/{cartpole,acrobot,mountain_car}.py, gym 0.26) so that
returns are comparable with results reported on those environments.
"""

import math

# cartpole.py
CARTPOLE_GRAVITY = 9.8
CARTPOLE_MASSCART = 1.0
CARTPOLE_MASSPOLE = 0.1
CARTPOLE_LENGTH = 0.5  # half the pole length
CARTPOLE_FORCE_MAG = 10.0
CARTPOLE_TAU = 0.02  # seconds between updates, explicit Euler
CARTPOLE_THETA_THRESHOLD = 12 * 2 * math.pi / 360
CARTPOLE_X_THRESHOLD = 2.4
CARTPOLE_INIT_HIGH = 0.05
CARTPOLE_MAX_STEPS = 500

# acrobot.py ("book" dynamics, RK4 over one dt)
ACROBOT_DT = 0.2
ACROBOT_LINK_LENGTH_1 = 1.0
ACROBOT_LINK_MASS_1 = 1.0
ACROBOT_LINK_MASS_2 = 1.0
ACROBOT_LINK_COM_POS_1 = 0.5
ACROBOT_LINK_COM_POS_2 = 0.5
ACROBOT_LINK_MOI = 1.0
ACROBOT_GRAVITY = 9.8
ACROBOT_MAX_VEL_1 = 4 * math.pi
ACROBOT_MAX_VEL_2 = 9 * math.pi
ACROBOT_TORQUES = (-1.0, 0.0, 1.0)
ACROBOT_INIT_HIGH = 0.1
ACROBOT_MAX_STEPS = 500

# mountain_car.py
MOUNTAINCAR_MIN_POSITION = -1.2
MOUNTAINCAR_MAX_POSITION = 0.6
MOUNTAINCAR_MAX_SPEED = 0.07
MOUNTAINCAR_GOAL_POSITION = 0.5
MOUNTAINCAR_GOAL_VELOCITY = 0.0
MOUNTAINCAR_FORCE = 0.001
MOUNTAINCAR_GRAVITY = 0.0025
MOUNTAINCAR_INIT_LOW = -0.6
MOUNTAINCAR_INIT_HIGH = -0.4
MOUNTAINCAR_MAX_STEPS = 200

# toy continuous task (not a Gym env)
POINTMASS_DT = 0.1
POINTMASS_DAMPING = 0.1
POINTMASS_MAX_FORCE = 1.0
POINTMASS_INIT_HIGH = 1.0
POINTMASS_MAX_STEPS = 200
