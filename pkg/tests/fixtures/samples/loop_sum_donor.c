int compute() {
    int SIZE = 64;
    int arr[64];
    int magic = 7;
    int total = 0;
    for (int i = 0; i < SIZE; i++) {
        arr[i] = i * magic;
    }
    for (int j = 0; j < SIZE; j++) {
        total += arr[j];
    }
    return total;
}
