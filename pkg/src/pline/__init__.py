"""Line-following search problems, LCP and contraction fixpoint tools."""
