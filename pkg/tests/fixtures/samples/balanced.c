int function(int a, int b, int c) {
    if (c > 0) {
        a = a + 10 % c;
    } else {
        b = b - 5 % c;
    }
    return a + b;
}
