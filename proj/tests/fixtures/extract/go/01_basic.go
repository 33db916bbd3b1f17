package mathx

// Sum returns a+b.
func Sum(a, b int) int {
	return a + b
}

func Diff(a, b int) int {
	return a - b
}

// Max returns the larger value.
// It panics on NaN.
func Max(a, b float64) float64 {
	if a > b {
		return a
	}
	return b
}
