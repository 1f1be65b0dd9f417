"""morphgrip: co-design of gripper finger geometry and pre-contact control
for gentle manipulation of deformable objects."""

__version__ = "0.1.0"
