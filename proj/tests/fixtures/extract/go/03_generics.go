package list

// List is a generic list.
type List[T any] struct {
	items []T
}

// Push appends an element.
func (l *List[T]) Push(v T) {
	l.items = append(l.items, v)
}

// Map applies f to every element.
func Map[T, U any](xs []T, f func(T) U) []U {
	out := make([]U, 0, len(xs))
	for _, x := range xs {
		out = append(out, f(x))
	}
	return out
}
