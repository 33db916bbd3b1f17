typedef struct {
    int len;
} buffer;

/**
 * Creates a point.
 */
struct point *make_point(int x, int y)
{
    struct point p = {x, y};
    return 0;
}

int main(void)
{
    char c = '}';
    return add(1, 2);
}
