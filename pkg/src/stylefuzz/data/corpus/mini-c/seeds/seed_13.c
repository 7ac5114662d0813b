int seed_13(int n) {
    int a[8];
    int b[8];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 8; i1++) { k += b[i1] + k; }
    return acc + t;
}
